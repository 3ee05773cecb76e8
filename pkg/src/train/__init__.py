"""TriMorph v2026 - Training Module"""

from .config import (
    StrictModel,
    ModelConfig,
    SceneConfig,
    TrainConfig,
    EditorConfig,
    CollapseDemoConfig,
)

from .optim import Adam

from .scenes import (
    BlobVolume,
    SceneRecord,
    SceneSampler,
    sample_scene,
    build_dataset,
    render_volume,
)

from .bundles import (
    GeneratorBundle,
    DiscriminatorBundle,
    ConvStem,
    StylePass,
    camera_batch,
    discriminator_input,
)

from .losses import (
    d_loss_terms,
    g_adv_terms,
    r1_penalty,
    r1_parameter_gradient,
    density_reg,
    density_reg_with_grad,
    r_jac_with_grad,
    r_norm_with_grad,
)

from .steps import TrainBatch, GanOptimizers, draw_alpha, generate, gan_step

from .diagnostics import (
    mean_pairwise_distance,
    diversity,
    sensitivity_ratio,
    generator_image_fn,
    generator_style_norm,
)

from .loop import Trainer, TrainResult, save_bundles, load_bundles, prepare_run, train_loop

from .collapse import collapse_demo

from .editor import EditorResult, create_editor, toy_edit_direction, edit_objective, train_editor
