"""Circuit builders for every protocol family."""
from .batteries import (
    CertificationTerm,
    MqcBattery,
    bell_from_cnot,
    build_certification_battery,
    build_mqc_battery,
    build_tomography_battery,
)
from .fanout import FanoutSpec, build_fanout, choose_mediators, skip_cnot
from .ghz import GhzSpec, build_ghz, ghz_data_prep, measure_data
from .teleport import (
    TeleportSpec,
    build_fully_unitary_cnot,
    build_measurement_based_cnot,
    build_mixed_style_bell,
    build_mixed_style_cnot,
    build_teleported_cnot,
    build_unitary_ed_bell,
    build_unitary_ed_cnot,
    mixed_block_sizes,
)
