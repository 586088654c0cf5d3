import sys

from focklab.cli import main

sys.exit(main())
