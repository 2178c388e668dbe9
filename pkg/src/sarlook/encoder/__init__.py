"""Embedding encoders: input stacks, baseline descriptor, auto-encoder."""

from .stacks import (  # noqa: F401
    ENCODER_TAGS,
    REPRESENTATION_TAGS,
    Embedding,
    InputStack,
    build_representation_stacks,
    crop_to_multiple,
    normalize_stack,
)
from .baseline import baseline_descriptor  # noqa: F401
from .model import (  # noqa: F401
    ConvTransformerAutoencoder,
    EncoderConfig,
    ae_loss,
    ae_loss_grad,
)
from .training import TrainingDiverged, embed_stack, embed_stacks, train_autoencoder  # noqa: F401
from .checkpoint import load_checkpoint, save_checkpoint  # noqa: F401
