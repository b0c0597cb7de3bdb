"""Link-level simulator for APQ power-domain modulation and GSSK in indoor visible light links."""

from .analysis import q_function, ser_amplitude, ser_phase, ser_quadrant, ser_total
from .apq import (
    ApqConfig,
    ComponentIndices,
    apq_modulate,
    components_to_complex,
    components_to_index,
    index_to_components,
    pam_level,
    power_allocation,
    serving_gain,
    sic_demodulate,
    split_for,
)
from .channel import (
    DetectionScale,
    Luminaire,
    Photodetector,
    Vec3,
    channel_gain,
    concentrator_gain,
    detection_scale,
    lambertian_order,
    radiant_intensity,
)
from .gssk import GsskConfig, gssk_detect_ml, gssk_modulate, gssk_received_mean
from .montecarlo import (
    ApqScheme,
    GsskScheme,
    Scene,
    SerEstimate,
    SweepResult,
    ThroughputMap,
    run_ser_point,
    run_snr_sweep,
    throughput_map,
)
from .scenario import ScenarioConfig, load_scenario

__version__ = "0.1.0"
