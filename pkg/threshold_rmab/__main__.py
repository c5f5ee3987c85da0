import sys

from threshold_rmab.cli import main

if __name__ == "__main__":
    sys.exit(main())
