# Copyright (C) 2024 socialgame-core developers
# SPDX-License-Identifier: MIT
