from matreg.cli import main
import sys

sys.exit(main())
