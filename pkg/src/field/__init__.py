"""TriMorph v2026 - Neural Field Module"""

from .network import (
    ACTIVATIONS,
    DenseNet,
    ForwardCache,
    softplus,
    activate,
    activate_grad,
    jvp,
    param_grad,
    jacobian_from_jvp,
    finite_difference_jacobian,
    add_gradients,
)

from .triplane import (
    PLANE_AXES,
    TriPlaneField,
    sample_triplane,
    sample_triplane_backward,
)

from .decoder import DecoderNet, FieldSample, decode
