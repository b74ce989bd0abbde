#!/usr/bin/env python3
"""
Shared constants for the two-clock weighted timed game workbench
"""

# Clocks
CLOCK_X = "x"
CLOCK_Y = "y"
CLOCKS = (CLOCK_X, CLOCK_Y)

# Main loop of a compiled game
ALPHA = 30              # Weight of every machine-state location and the CEC rate
STATE_WEIGHT = 30
EXIT_WEIGHT = 31        # Exit module: location weight and final transition weight
SOFT_EXIT_WEIGHT = 30   # Soft-exit location weight (Existence variant)
TARGET_COST = 61        # Cost secured by a faithful simulation

# CEC beta per machine operation: the wait fraction is 1 - beta/30
BETA_INC_C = 3          # wait 9/10 (1 - x)
BETA_INC_D = 2          # wait 14/15 (1 - x)
BETA_DEC_C = 12         # wait 3/5 (1 - x)
BETA_DEC_D = 18         # wait 2/5 (1 - x)
BETA_ZERO = 6           # wait 4/5 (1 - x)
CEC_BETAS = (BETA_DEC_D, BETA_DEC_C, BETA_ZERO, BETA_INC_C, BETA_INC_D)

# CZ / CNZ internals (the loop rate must stay below 30 so every CM weight is a natural)
CZ_RATE = 27            # flag1/flag2/flag3 weight and inner CM alpha
CZ_CM_BETA = 1          # inner CM beta, makes the stop cost 61 + M + E + eta
CZ_CM_MARGIN = 3        # inner CM M is the module M plus this margin
CZ_GOAL_BONUS = 4       # flag1 -> goal transition adds M + 4
CZ_DIRECT_WEIGHT = 32   # flag4 location weight
CM_FACTORS = (2, 3, 5)  # multiplication factors checked by CM

# Multiplicative families behind the counter encoding
ENCODING_BASES = (2, 3, 5)

# Time bound of any compiled play
MAX_PLAY_DURATION = 3

# Simulation defaults
DEFAULT_N = 2           # precision / exit threshold exponent
DEFAULT_STEP_CAP = 10_000
DEFAULT_GRID_NODE_BUDGET = 200_000
DEFAULT_RANDOM_SAMPLES = 50
DEFAULT_STOP_PROBABILITY = (1, 4)   # random Max stops with probability 1/4
RANDOM_WAIT_STEPS = 10  # random Max waits r/100 of its budget, r <= this
HARNESS_STEP_CAP = 400  # plays that should run forever stop here inside the suites
GRID_STEP_CAP = 64

# CLI exit statuses
EXIT_OK = 0
EXIT_FAULT = 1          # validation failure or strategy fault
EXIT_PARSE = 2
EXIT_VERIFY = 3
EXIT_RESOURCE = 4

# Fixtures
FIXTURES_ENV_VAR = "WTG_FIXTURES"
DEFAULT_FIXTURES_DIR = "fixtures"
MACHINE_SUFFIX = ".tcm"

# Console output
BANNER_WIDTH = 60
DECIMAL_DIGITS = 12     # digits shown by --decimal renderings
