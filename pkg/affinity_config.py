#!/usr/bin/env python3
"""
Affinity Spectrum Configuration
Numerical knobs, gallery defaults and output settings for the certified
pressure / dimension engine and its command-line front end
"""

import copy
import logging
import os
from typing import Dict, Any

AFFINITY_CONFIG = {
    "app_name": "Affinity Spectrum",
    "version": "1.0.0",
    "description": "Certified affinity dimensions and dimension spectra of planar self-affine IFS",

    # Built-in systems
    "galleries": {
        "paper51": {
            "beta": 5.0,
            "gamma": None,  # None: smallest power of ten passing every check
            "b": 0.6,
            "d": 0.9,
            "c": 0.4,
            "eta": 0.5,
            "tail_start": 5,
        },
        "isolated52": {
            "tail_base": 4.0,
            "x_ratio": 1.0 / 3.0,
            "head_ratio": 0.25,
        },
        "selfsimilar": {
            "ratios": [0.5, 0.25],
        },
    },

    # Certified numerics
    "numerics": {
        "slack": 1e-12,            # relative rounding allowance per arithmetic stage
        "prune_ratio": 1e-18,      # subtree pruning threshold relative to the largest subtree bound
        "word_cache_limit": 1 << 20,
        "block_words": 1 << 16,
        "initial_depth": 2,
        "max_enumeration_depth": 64,
        "max_bisection_steps": 200,
        "exact_tolerance": 1e-13,
        "linear_fast_path_depth": 2048,
        "spectrum_max_depth": 6,
        "min_budget": 1000,
        "delta_margin": 7,         # indices past the largest listed one before a cofinite cut
    },

    # Spectrum / demo defaults
    "spectrum": {
        "n_max": 10,
        "exhaustive_limit": 22,
        "samples": 2000,
        "seed": 0,
        "truncation_margin": 7,
        "non_compact_tail": [5, 14],
        "non_compact_tolerance": 1e-10,
    },

    # Output Settings
    "output": {
        "significant_digits": 17,
        "csv_delimiter": ";",
        "formats": ["csv", "json"],
    },

    # Logging Settings
    "logging": {
        "level": "INFO",
        "format": "%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    },
}

def get_affinity_config() -> Dict[str, Any]:
    """Get base configuration"""
    return AFFINITY_CONFIG

def get_gallery_config(name: str) -> Dict[str, Any]:
    """Get default parameters of a built-in system"""
    return dict(FINAL_AFFINITY_CONFIG["galleries"].get(name, {}))

def get_numerics_config() -> Dict[str, Any]:
    """Get numerics configuration"""
    return FINAL_AFFINITY_CONFIG["numerics"]

def get_spectrum_config() -> Dict[str, Any]:
    """Get spectrum configuration"""
    return FINAL_AFFINITY_CONFIG["spectrum"]

def get_output_config() -> Dict[str, Any]:
    """Get output configuration"""
    return FINAL_AFFINITY_CONFIG["output"]

def get_logging_config() -> Dict[str, Any]:
    """Get logging configuration"""
    return FINAL_AFFINITY_CONFIG["logging"]

# Environment-specific overrides
def load_affinity_config_from_env() -> Dict[str, Any]:
    """Load configuration from environment variables"""
    config = copy.deepcopy(AFFINITY_CONFIG)

    if os.getenv("AFFINITY_SLACK"):
        config["numerics"]["slack"] = float(os.getenv("AFFINITY_SLACK"))

    if os.getenv("AFFINITY_PRUNE_RATIO"):
        config["numerics"]["prune_ratio"] = float(os.getenv("AFFINITY_PRUNE_RATIO"))

    if os.getenv("AFFINITY_CACHE_LIMIT"):
        config["numerics"]["word_cache_limit"] = int(os.getenv("AFFINITY_CACHE_LIMIT"))

    if os.getenv("AFFINITY_SPECTRUM_DEPTH"):
        config["numerics"]["spectrum_max_depth"] = int(os.getenv("AFFINITY_SPECTRUM_DEPTH"))

    if os.getenv("AFFINITY_DELTA_MARGIN"):
        config["numerics"]["delta_margin"] = int(os.getenv("AFFINITY_DELTA_MARGIN"))

    if os.getenv("AFFINITY_CSV_DELIMITER"):
        config["output"]["csv_delimiter"] = os.getenv("AFFINITY_CSV_DELIMITER")

    if os.getenv("LOG_LEVEL"):
        config["logging"]["level"] = os.getenv("LOG_LEVEL")

    return config

def setup_logging() -> None:
    """Configure root logging from the logging section"""
    log_config = get_logging_config()
    logging.basicConfig(
        level=getattr(logging, str(log_config["level"]).upper(), logging.INFO),
        format=log_config["format"],
    )

# Get final configuration
FINAL_AFFINITY_CONFIG = load_affinity_config_from_env()

def get_final_config() -> Dict[str, Any]:
    """Get final configuration with environment overrides"""
    return FINAL_AFFINITY_CONFIG
