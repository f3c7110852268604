import configparser
import os
from argparse import ArgumentParser

import linalg_core

BASE_DIR = os.path.split(os.path.realpath(__file__))[0]
TEMPLATE_PATH = os.path.join(BASE_DIR, 'config_template.ini')

DEFAULTS = {
    'TOL_HERM': '1e-10',
    'TOL_UNITARY': '1e-10',
    'TOL_RECON': '1e-8',
    'TOL_COMMUTATOR': '1e-9',
    'MAX_SITE_DIM': '8',
    'MAX_TOTAL_DIM': '64',
    'EIGEN_MAX_SWEEPS': '100',
    'SOLVER': 'jacobi',
    'DIMENSION': '2',
    'RESTARTS_LOCAL': '8',
    'RESTARTS_NONLOCAL': '100',
    'MAX_ITERATIONS': '2000',
    'STEP_SIZE': '0.05',
    'CONVERGENCE_EPS': '1e-9',
    'GRADIENT': 'analytic',
    'GRADIENT_STEP': '1e-5',
    'WORKERS': '1',
    'SEED': '42',
    'SHOTS': '1000000',
    'SHOT_BLOCK': '65536',
    'EFFICIENCY_A': '1.0',
    'EFFICIENCY_B': '1.0',
    'DARK_COUNT': '0.0',
    'PROGRESS': 'false',
}

def build_parser():
    parser = ArgumentParser(add_help=False)
    parser.add_argument(
        "--config",
        dest="config",
        help="config file path (default: config_template.ini next to this file)",
        metavar="CONFIG",
        default=TEMPLATE_PATH
    )
    return parser

def get_config(config_path=None) -> configparser.ConfigParser:
    config = configparser.ConfigParser()
    config.optionxform = str  # keep UPPERCASE keys
    config.read_dict({'CONFIG': DEFAULTS})
    if config_path:
        if not os.path.exists(config_path):
            raise OSError(f"config file not found: {config_path}")
        config.read(config_path, encoding='utf-8')
    return config

def apply_config(config: configparser.ConfigParser):
    """Push tolerances and caps from the config into linalg_core."""
    section = config["CONFIG"]
    linalg_core.configure_tolerances(
        herm=section.getfloat("TOL_HERM"),
        unitary=section.getfloat("TOL_UNITARY"),
        recon=section.getfloat("TOL_RECON"),
        commutator=section.getfloat("TOL_COMMUTATOR"),
        max_site_dim=section.getint("MAX_SITE_DIM"),
        max_total_dim=section.getint("MAX_TOTAL_DIM"),
        max_sweeps=section.getint("EIGEN_MAX_SWEEPS"),
        solver=section.get("SOLVER"),
    )
    return config

if __name__ == '__main__':
    args, _ = build_parser().parse_known_args()
    config = get_config(args.config)
    print(dict(config["CONFIG"]))
