import sys

from dualratio_me.cli import main

if __name__ == "__main__":
    sys.exit(main())
