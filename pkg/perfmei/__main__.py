# perfmei/__main__.py
import sys

from perfmei.cli import main

if __name__ == "__main__":
    sys.exit(main())
