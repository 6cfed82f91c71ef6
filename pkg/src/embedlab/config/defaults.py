"""
Default values and environment variables for embedlab configuration.

This module centralizes all default values and environment variable names
used throughout embedlab.
"""

# Environment variable names
ENV_CONFIG = "EMBEDLAB_CONFIG"
ENV_LOG_FILE = "EMBEDLAB_LOG_FILE"

# Tokenizer
DEFAULT_MAX_SEQ_LEN = 64

# Encoder (desk scale)
DEFAULT_N_LAYERS = 2
DEFAULT_N_HEADS = 4
DEFAULT_D_MODEL = 64
DEFAULT_D_FF = 256
DEFAULT_ATTENTION_MODE = "causal"
DEFAULT_INIT_STD = 0.02

# Contrastive objective
DEFAULT_INIT_TEMPERATURE = 0.07  # exp(tau) starts at 1/0.07
DEFAULT_MAX_LOGIT_SCALE = 100.0

# Training
DEFAULT_BATCH_SIZE = 32
DEFAULT_LEARNING_RATE = 1e-3
DEFAULT_BETA1 = 0.9
DEFAULT_BETA2 = 0.98
DEFAULT_ADAM_EPS = 1e-8
DEFAULT_WARMUP_FRACTION = 0.1
DEFAULT_TOTAL_STEPS = 1000
DEFAULT_SEED = 0
DEFAULT_GRAD_CLIP_NORM = 1.0

# Vector index
DEFAULT_INDEX_MODE = "flat"
DEFAULT_GRAPH_DEGREE = 16
DEFAULT_GRAPH_BEAM = 64

# Evaluation
DEFAULT_RETRIEVAL_KS = (1, 10, 20, 100)
DEFAULT_KNN_K = 256
DEFAULT_PROBE_L2 = 1e-4
DEFAULT_PROBE_STEPS = 500
DEFAULT_PROBE_LR = 0.1
DEFAULT_CODE_SEARCH_POOL = 1000
DEFAULT_EMBED_BATCH_SIZE = 64

# File naming
CHECKPOINT_SUFFIX = ".cpte"
INDEX_SUFFIX = ".cpti"
METRICS_SUFFIX = ".metrics.csv"
