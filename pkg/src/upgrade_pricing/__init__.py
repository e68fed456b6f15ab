"""Exact verification of upgrade pricing optimality for finite type spaces."""

__version__ = "0.1.0"


def self_test() -> bool:
    """Import every module and certify a two-type instance end to end."""
    from fractions import Fraction

    from .model import Instance
    from .pipeline import AnalysisEngine, AnalysisStatus

    print("Upgrade Pricing Lab")
    try:
        from . import analysis, cli, duality, ironing, lp, pricing, serialization  # noqa: F401
        print("Module imports successful")

        inst = Instance(
            theta=((Fraction(1), Fraction(1)), (Fraction(2), Fraction(3))),
            f=(Fraction(1, 2), Fraction(1, 2)),
        )
        report = AnalysisEngine().analyze(inst)
        print(f"Sample instance: {report.status.value}, revenue {report.revenue}")
        if report.status is not AnalysisStatus.CERTIFIED_OPTIMAL:
            print("Self-test failed: sample instance was not certified")
            return False
        print("All self-tests passed!")
        return True
    except Exception as e:
        print(f"Self-test failed: {e}")
        import traceback
        traceback.print_exc()
        return False


def main() -> None:
    import sys

    if len(sys.argv) > 1 and sys.argv[1] == "--test":
        sys.exit(0 if self_test() else 1)

    from .cli import run
    sys.exit(run(sys.argv[1:]))
