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

"""Scenario files: line-oriented ``key = value`` text.

    embedding   = tensor            # or shared
    value_range = -1, 1             # or 0, 1
    dim_a       = 2
    dim_b       = 2
    a1          = pauli_z
    a2          = pauli_x
    b1          = bloch 45 0        # polar / azimuthal angle in degrees
    b2          = [0.7071, 0.7071, 0.7071, -0.7071]
    state       = phi_plus          # optional

Observable values are presets (``pauli_x``, ``pauli_y``, ``pauli_z``,
``identity``, ``bloch THETA PHI``, ``polarizer THETA``, ``diag v1 v2 ...``)
or explicit row-major complex entries. States are ``phi_plus``,
``maximally_mixed``, ``basis INDEX``, ``optimal`` or explicit vector entries.
"""

import configparser
import math
import re
from typing import Optional, Tuple

import numpy as np

import scenario as sc
from linalg_core import LinalgError, QuantumState, pure_state

SECTION = 'SCENARIO'
OBSERVABLE_KEYS = ('a1', 'a2', 'b1', 'b2')
KNOWN_KEYS = {'embedding', 'value_range', 'dim_a', 'dim_b', 'state', *OBSERVABLE_KEYS}
EMBEDDINGS = {
    'tensor': sc.Embedding.TensorEmbedded,
    'tensorembedded': sc.Embedding.TensorEmbedded,
    'shared': sc.Embedding.SharedSpace,
    'sharedspace': sc.Embedding.SharedSpace,
}

class ScenarioFileError(ValueError):
    pass

def parse_entries(text: str) -> np.ndarray:
    """'[1, 0, 0.5+0.5j, -1]' -> complex array; 'i' is accepted for the imaginary unit."""
    body = text.strip().strip('[]()')
    tokens = [t for t in re.split(r'[,\s;]+', body) if t]
    if not tokens:
        raise ValueError("no matrix entries given")
    values = []
    for token in tokens:
        token = token.replace('i', 'j').replace('J', 'j')
        values.append(complex(token))
    return np.array(values, dtype=complex)

def _square(entries: np.ndarray, dim: Optional[int]) -> np.ndarray:
    n = entries.size
    side = dim if dim else int(round(math.sqrt(n)))
    if side * side != n:
        raise ValueError(f"{n} entries do not form a {side}x{side} matrix")
    return entries.reshape(side, side)

def parse_observable(text: str, dim: Optional[int] = None) -> np.ndarray:
    words = text.split()
    if not words:
        raise ValueError("empty observable")
    name = words[0].lower()
    args = words[1:]
    if name in ('pauli_x', 'pauli_y', 'pauli_z'):
        if args:
            raise ValueError(f"{name} takes no arguments")
        m = {'pauli_x': sc.pauli_x, 'pauli_y': sc.pauli_y, 'pauli_z': sc.pauli_z}[name]()
    elif name == 'identity':
        m = sc.identity(int(args[0]) if args else (dim or 2))
    elif name == 'bloch':
        if len(args) != 2:
            raise ValueError("bloch takes THETA PHI in degrees")
        m = sc.bloch(math.radians(float(args[0])), math.radians(float(args[1])))
    elif name == 'polarizer':
        if len(args) != 1:
            raise ValueError("polarizer takes THETA in degrees")
        m = sc.polarizer(math.radians(float(args[0])))
    elif name == 'diag':
        m = sc.diag([float(a) for a in args])
    else:
        m = _square(parse_entries(text), dim)
    if dim and m.shape[0] != dim:
        raise ValueError(f"observable has dimension {m.shape[0]}, expected {dim}")
    return m

def parse_state(text: str, s: sc.BellScenario) -> QuantumState:
    words = text.split()
    name = words[0].lower() if words else ''
    if name == 'phi_plus':
        if s.embedding is not sc.Embedding.TensorEmbedded or s.dim_a != s.dim_b:
            raise ValueError("phi_plus needs a tensor scenario with equal site dimensions")
        return sc.phi_plus(s.dim_a)
    if name == 'maximally_mixed':
        return sc.maximally_mixed(s.dim)
    if name == 'basis':
        return sc.basis_state(s.dim, int(words[1]) if len(words) > 1 else 0)
    if name == 'optimal':
        return sc.optimal_state(s)
    return pure_state(parse_entries(text))

def parse_scenario_text(text: str, source: str = '<string>') -> Tuple[sc.BellScenario, Optional[QuantumState]]:
    config = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=('#', ';'))
    try:
        config.read_string(f'[{SECTION}]\n' + text, source=source)
    except configparser.Error as e:
        raise ScenarioFileError(f"{source}: {e}")
    section = config[SECTION]

    unknown = set(section.keys()) - KNOWN_KEYS
    if unknown:
        raise ScenarioFileError(f"{source}: unknown keys {sorted(unknown)}")
    missing = [k for k in OBSERVABLE_KEYS if k not in section]
    if missing:
        raise ScenarioFileError(f"{source}: missing observables {missing}")

    key = 'embedding'
    try:
        embedding = EMBEDDINGS[section.get('embedding', 'tensor').strip().lower()]
        key = 'value_range'
        value_range = tuple(float(v) for v in section.get('value_range', '-1, 1').split(','))
        key = 'dim_a'
        dim_a = section.getint('dim_a', fallback=None)
        key = 'dim_b'
        dim_b = section.getint('dim_b', fallback=None)
        if embedding is sc.Embedding.SharedSpace and dim_a and dim_b and dim_a != dim_b:
            raise ValueError("shared-space scenarios need dim_a == dim_b")
        observables = {}
        for key in OBSERVABLE_KEYS:
            dim = dim_a if key.startswith('a') else dim_b
            observables[key] = parse_observable(section[key], dim)
    except KeyError:
        raise ScenarioFileError(f"{source}: bad value for '{key}'")
    except (ValueError, TypeError) as e:
        raise ScenarioFileError(f"{source}: bad value for '{key}': {e}")

    s = sc.build_scenario(observables['a1'], observables['a2'], observables['b1'], observables['b2'],
                          embedding=embedding, value_range=value_range)
    state = None
    if 'state' in section:
        try:
            state = parse_state(section['state'], s)
        except (ValueError, IndexError, LinalgError) as e:
            raise ScenarioFileError(f"{source}: bad value for 'state': {e}")
    return s, state

def load_scenario(path: str) -> Tuple[sc.BellScenario, Optional[QuantumState]]:
    with open(path, encoding='utf-8') as f:
        text = f.read()
    return parse_scenario_text(text, source=path)
