#!/usr/bin/env python3
# -*- coding: utf-8 -*-
#
# Copyright (c) 2024, trackmarket authors
# All Rights Reserved.
#
# The file is part of the trackmarket project and is released under the
# 2-clause BSD license. See the file `LICENSE.txt` for the full license
# governing this code.

import trackmarket

if __name__ == '__main__':
    trackmarket.main.main()
