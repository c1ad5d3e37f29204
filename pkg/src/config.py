"""Configuration management for the epidemic-opinion toolkit."""

import os
from dotenv import load_dotenv

load_dotenv()


class Config:
    """Global configuration settings."""

    # Integrator Configuration
    STEP_SIZE = float(os.getenv('STEP_SIZE', 0.01))
    HORIZON = float(os.getenv('HORIZON', 500))
    RECORD_EVERY = int(os.getenv('RECORD_EVERY', 10))

    # Output Configuration
    OUTPUT_DIR = os.getenv('OUTPUT_DIR', 'output')

    # Logging Configuration
    LOG_LEVEL = os.getenv('LOG_LEVEL', 'INFO')

    # Analysis limits
    DENSE_SIZE_CAP = int(os.getenv('DENSE_SIZE_CAP', 200))
    PATTERN_CAP = int(os.getenv('PATTERN_CAP', 2 ** 16))  # exhaustive sign patterns up to n = 16
    PATTERN_SAMPLES = int(os.getenv('PATTERN_SAMPLES', 4096))

    # Scenario generation
    GENERATOR_RETRY_BUDGET = int(os.getenv('GENERATOR_RETRY_BUDGET', 1000))
    DEFAULT_EDGE_DENSITY = 0.3

    # Control and verification
    VERIFY_HORIZON = float(os.getenv('VERIFY_HORIZON', 500))
    ERADICATION_TOL = float(os.getenv('ERADICATION_TOL', 1e-6))  # sup-norm of x at horizon
    THRESHOLD_TOL = 1e-8
    EXHAUSTIVE_MAX_N = 16
    PLAN_TARGET_R = 1 - 1e-9
    TIE_TOL = 1e-12

    # Graph constants
    CONNECTIVITY_FLOOR = 1e-12  # weights below this are structural zeros

    # Spectral constants
    SPECTRAL_TOL = 1e-12
    STABILITY_EPS = 1e-8  # Hurwitz marginal band
    R_BAND = 1e-9  # marginal band around R = 1

    # Equilibrium search
    EQUILIBRIUM_TOL = 1e-10
    NEWTON_HANDOFF_TOL = 1e-6
    NEWTON_MAX_ITER = 50
    ENDEMIC_INITIAL_HORIZON = 100.0
    ENDEMIC_MAX_HORIZON = 6400.0
    HEALTHY_COLLAPSE_TOL = 1e-8
    SWITCHING_SURFACE_TOL = 1e-12

    # Integrator guards
    BOX_TOLERANCE = 1e-6  # larger pre-projection excursions raise StepTooLarge
    EVENT_TOLERANCE = 1e-6  # crossing time resolution, as a fraction of h
    MAX_SPLITS_PER_STEP = 64
    SLIDING_CROSSINGS = 100
    SLIDING_WINDOW = 1.0
