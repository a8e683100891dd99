import sys

from relaydmt.cli import main

sys.exit(main())
