"""Sensing and communication Monte Carlo harness."""

from .ber import BerScenario, run_ber_mc
from .channel import ChannelRealization, doubly_selective_apply, random_channel
from .pa import RappPa, apply_ibo, rapp_amplify
from .receiver import effective_channel_matrix, mmse_receive
from .sensing import CfarConfig, DetectionScenario, ca_cfar, range_doppler_map, run_detection_mc

__all__ = [
    "BerScenario", "CfarConfig", "ChannelRealization", "DetectionScenario", "RappPa", "apply_ibo",
    "ca_cfar", "doubly_selective_apply", "effective_channel_matrix", "mmse_receive", "random_channel",
    "range_doppler_map", "rapp_amplify", "run_ber_mc", "run_detection_mc",
]
