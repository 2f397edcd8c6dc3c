"""Full-model shifted AUC over a 3 x 3 grid of (lambda_attr, lambda_ortho)."""
import argparse

from daid.ablation import lambda_sweep, threads_from_env
from daid.synthgen import ScmConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--attr", type=float, nargs=3, default=(0.35, 0.7, 1.4))
    ap.add_argument("--ortho", type=float, nargs=3, default=(0.1, 0.2, 0.4))
    args = ap.parse_args()
    sweep = lambda_sweep(range(args.seeds), args.attr, args.ortho, scm=ScmConfig(), threads=threads_from_env())
    print("lambda_attr  " + "  ".join(f"ortho={lo:<6}" for lo in args.ortho))
    for la in args.attr:
        print(f"{la:<11}  " + "  ".join(f"{sweep[(la, lo)].auc['shifted']:.4f}     " for lo in args.ortho))
    aucs = [r.auc["shifted"] for r in sweep.values()]
    print(f"range {max(aucs) - min(aucs):.4f}")


if __name__ == "__main__":
    main()
