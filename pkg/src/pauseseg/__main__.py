import sys

from pauseseg.cli import main

sys.exit(main())
