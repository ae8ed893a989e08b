"""Color conditioning toolkit: histograms, palettes, transport distances,
corpus curation, and a palette adherence evaluation protocol."""

__version__ = "0.1.0"

from .colorspace import (
    ColorHsv,
    ColorLab,
    ColorRgb,
    DistanceParams,
    ciede2000,
    rgb_to_hsv,
    rgb_to_lab,
    thresholded_distance,
)
from .conditioning import (
    AugmentationType,
    ConditionRecord,
    DropoutTable,
    build_condition,
    cfg_combine,
    deserialize_condition,
    relative_entropy,
    sample_augmentation,
    serialize_condition,
)
from .curation import (
    CorpusStats,
    CurationSelection,
    RareBinSet,
    rank_bins,
    rare_bins,
    scan_corpus,
    select_rare_images,
)
from .evaluation import (
    EvalCase,
    EvalReport,
    Palette2D,
    ablation_report,
    caption_mentions_color,
    evaluate,
    filter_color_captions,
    make_palette_2d,
)
from .histogram import (
    DIMS,
    N_BINS,
    BinIndex,
    HsvHistogram,
    bin_center_lab,
    bin_of,
    entropy_bits,
    histogram_of_image,
    read_phst,
    write_phst,
)
from .palette import Palette, extract_kmeans, extract_median_cut, palette_to_histogram
from .transport import (
    GroundDistance,
    SimilarityMatrix,
    TransportPlan,
    emd,
    emd_oracle,
    ground_distance,
    palette_image_distance,
    quadratic_chi,
    similarity,
)
