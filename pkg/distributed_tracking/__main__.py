import sys

from distributed_tracking.harness.cli import main

sys.exit(main())
