import sys

from asyncmdi.cli import main

sys.exit(main())
