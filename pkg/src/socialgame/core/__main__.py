# Copyright (C) 2024 socialgame-core developers
# SPDX-License-Identifier: MIT

import sys

from socialgame.core.cli import main

sys.exit(main())
