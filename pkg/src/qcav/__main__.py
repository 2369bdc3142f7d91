import sys

from qcav.cli import main

sys.exit(main())
