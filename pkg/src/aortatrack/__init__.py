"""Track the descending aorta and its branches through transverse slices,
separate lumen from calcification, and report per-slice stenosis."""

from .classify import ClassifyParams, Partition, classify_pixels, otsu_threshold
from .config import PipelineConfig, load_config, parse_config
from .errors import AortaTrackError
from .evaluation import AgreementReport, compare_counts
from .metrics import (
    SliceMetrics,
    StenosisProfile,
    agatston_score,
    calcification_intensity_profile,
    compute_slice_metrics,
    write_metrics_csv,
)
from .phantom import GroundTruth, Lesion, PhantomSpec, VesselSegment, generate_phantom, preset
from .pipeline import run_pipeline, write_outputs
from .render import plot_profile_svg, render_overlay, write_ppm
from .segment import (
    Component,
    OvalCriteria,
    ShapeMetrics,
    label_components,
    passes_ovalar,
    shape_metrics,
    threshold_slice,
)
from .track import TrackParams, VesselTree, propagate_slice, seed_arteries, track_volume
from .volume_io import Rescale, Volume, load_pgm_stack, load_raw_volume, write_raw_volume

__version__ = "0.1.0"
