import sys

from ponfog.cli import main

sys.exit(main())
