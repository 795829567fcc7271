"""Allow ``python -m splitner``."""

import sys

from splitner.cli import main

if __name__ == "__main__":
    sys.exit(main())
