#  Bell Bound
#
#  Licensed under the Apache License, Version 2.0 (the "License");
#  you may not use this file except in compliance with the License.
#  You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
#  Unless required by applicable law or agreed to in writing, software
#  distributed under the License is distributed on an "AS IS" BASIS,
#  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
#  See the License for the specific language governing permissions and
#  limitations under the License.

import math
import os
import sys
import time
from decimal import Decimal, ROUND_HALF_UP
from typing import Iterable

import numpy as np
import pandas as pd

SEED_ENV = 'BELLBOUND_SEED'
UINT64_MAX = 2**64 - 1
CSV_FLOAT_FORMAT = '%.17g'

def plog(content):
    print('{} {}'.format(time.strftime("%Y-%m-%d %H:%M:%S", time.localtime(time.time())), content), file=sys.stderr)

def round_decimal(value, places=6):
    """
    将浮点数转换为 Decimal 并四舍五入到指定小数位数
    """
    if isinstance(value, float):
        if not math.isfinite(value):
            return value
        value = repr(value)  # 将 float 转换为字符串以避免精度损失
    return Decimal(value).quantize(Decimal(f'0.{"0" * places}'), rounding=ROUND_HALF_UP)

def check_seed(seed) -> int:
    seed = int(seed)
    if not 0 <= seed <= UINT64_MAX:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return seed

def resolve_seed(flag_seed=None, config_seed=None) -> int:
    """Seed from the command line, then BELLBOUND_SEED, then the config file."""
    if flag_seed is not None:
        return check_seed(flag_seed)
    env_seed = os.environ.get(SEED_ENV, '').strip()
    if env_seed:
        try:
            return check_seed(env_seed)
        except ValueError:
            raise ValueError(f"{SEED_ENV} must be an unsigned 64-bit integer, got {env_seed!r}")
    return check_seed(config_seed if config_seed is not None else 0)

def derived_seed(master_seed: int, index: int) -> int:
    return (master_seed + index) & UINT64_MAX

def parse_degrees(text: str, count: int = 4) -> tuple:
    """'0,45,22.5,-22.5' -> radians"""
    parts = [p.strip() for p in text.split(',') if p.strip()]
    if len(parts) != count:
        raise ValueError(f"expected {count} comma separated angles, got {len(parts)}")
    return tuple(math.radians(float(p)) for p in parts)

def write_csv(df: pd.DataFrame, path=None) -> str:
    text = df.to_csv(index=False, float_format=CSV_FLOAT_FORMAT, lineterminator='\n')
    if path:
        with open(path, 'w', encoding='utf-8', newline='') as f:
            f.write(text)
    else:
        sys.stdout.write(text)
    return text

def format_report(rows: Iterable[tuple], places=6) -> str:
    lines = []
    for key, value in rows:
        if isinstance(value, (float, np.floating)):
            value = round_decimal(float(value), places)
        lines.append('{:<22} {}'.format(key, value))
    return '\n'.join(lines)
