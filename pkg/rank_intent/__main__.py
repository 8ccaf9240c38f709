import sys

from rank_intent._cli import main

sys.exit(main())
