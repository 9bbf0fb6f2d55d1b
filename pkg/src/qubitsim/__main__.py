import sys

from qubitsim.cli import main

sys.exit(main())
