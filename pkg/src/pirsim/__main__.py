import sys
from pirsim.cli import main

sys.exit(main())
