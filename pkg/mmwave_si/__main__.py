import sys

from mmwave_si.main import main

sys.exit(main())
