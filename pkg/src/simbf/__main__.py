import sys

from simbf.harness.cli import main

sys.exit(main())
