"""Rate-distortion optimized packet scheduling for tiled 360-degree video.

The library models GOP-structured tiled segments with per-packet
rate-distortion metadata, ranks tiles by viewport overlap against a
predicted viewpoint, schedules packet drops under a byte budget with an
exact trellis optimizer, and replays sessions through a trace-driven
network-node simulator that reports the five evaluation metrics.
"""

from .baselines import ewrd_schedule, ipb_drop, nirap_drop, tail_drop
from .distortion import (
    TransmissionSet,
    conceal,
    packet_distortion,
    set_distortion,
    weighted_distortion,
)
from .media import (
    DistortionTable,
    FrameType,
    Packet,
    SegmentFormatError,
    SynthConfig,
    TileStream,
    VideoSegment,
    build_distortion_table,
    load_segment,
    read_pgm,
    save_segment,
    synth_video,
    write_pgm,
)
from .netsim import (
    BandwidthTrace,
    QueueNode,
    ComparisonTable,
    MetricsReport,
    SessionConfig,
    compare_strategies,
    constant_trace,
    load_lte_trace,
    run_session,
    salient_viewpoint,
    save_trace,
)
from .predictor import (
    FilePredictor,
    GroundTruthPredictor,
    LastPositionPredictor,
    Prediction,
    PredictionEntry,
    Trajectory,
    TrajectoryPoint,
    evaluate_predictor,
    last_position_predict,
    load_predictions,
    load_trajectory,
    make_smooth_trajectory,
    roll_predictor,
    save_predictions,
    save_trajectory,
    static_trajectory,
)
from .scheduler import (
    InfeasibleBudgetError,
    RdCurve,
    RdPoint,
    Schedule,
    TileSchedule,
    TrellisState,
    allocate_budget,
    brute_force_schedule,
    dp_single_tile,
    per_tile_rd_curve,
    phi,
    schedule,
    trellis_states,
)
from .ssim import frame_distortion, ssim
from .viewport import (
    TileGrid,
    TileWeights,
    ViewportSpec,
    Viewpoint,
    classify_tiles,
    great_circle_distance,
    overlap_fractions,
    tile_weight,
    weights_for_prediction,
)

__version__ = "0.1.0"
