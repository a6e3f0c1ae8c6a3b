#!/usr/bin/env python3
#
# Copyright (c) 2024, trackmarket authors
# All Rights Reserved.
#
# The file is part of the trackmarket project and is released under the
# 2-clause BSD license. See the file `LICENSE.txt` for the full license
# governing this code.

from trackmarket.main import __version__

from . import exception
from . import utils
from . import ingest
from . import kb
from . import attribution
from . import metrics
from . import market
from . import overlap
from . import config
from . import api
from . import main

__all__ = [
    'api',
    'attribution',
    'config',
    'exception',
    'ingest',
    'kb',
    'market',
    'metrics',
    'overlap',
    'utils',
    'main'
]
