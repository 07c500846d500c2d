#!/usr/bin/env python3
"""
Launcher for the affinity dimension toolkit
Checks the numerical stack, then hands the command line to affinity_cli
"""

import sys

from config import settings


def show_info():
    """Show launcher banner"""
    print("=" * 60)
    print("       AFFINITY SPECTRUM - CERTIFIED DIMENSION TOOLKIT")
    print("=" * 60)
    print("Pressures, affinity dimensions and dimension spectra")
    print("of finite and infinite planar self-affine systems")
    print("=" * 60)


def check_requirements() -> bool:
    """Check if all requirements are met"""
    print("\n=== CHECKING REQUIREMENTS ===")

    try:
        import numpy  # noqa: F401
        print("✓ numpy available")
    except ImportError:
        print("✗ numpy not found")
        print("Please install: pip install numpy")
        return False

    try:
        import scipy  # noqa: F401
        print("✓ scipy available")
    except ImportError:
        print("✗ scipy not found")
        print("Please install: pip install scipy")
        return False

    if settings.langfuse_public_key and settings.langfuse_secret_key:
        print("✓ Langfuse tracing configured")
    else:
        print("~ Langfuse keys not set; run tracing disabled")

    print(f"✓ Threads: {settings.threads}  budget: {settings.default_budget}  "
          f"tolerance: {settings.default_tolerance:g}")
    return True


def main() -> int:
    show_info()
    if not check_requirements():
        print("\n✗ Requirements not met. Please fix the issues above.")
        return 1
    if len(sys.argv) < 2:
        print("\nUsage: python run_affinity.py <pressure|dim|spectrum|verify|demo> [options]")
        print("Example: python run_affinity.py dim --gallery paper51 --subset 1,2,3 --tol 1e-4")
        return 0

    from affinity_cli import main as cli_main
    return cli_main(sys.argv[1:])


if __name__ == "__main__":
    try:
        sys.exit(main())
    except KeyboardInterrupt:
        print("\n\nOperation cancelled by user")
        sys.exit(130)
