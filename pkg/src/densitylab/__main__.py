import sys

from densitylab.harness.cli import main

sys.exit(main())
