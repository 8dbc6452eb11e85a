"""Scenario adapters: CDN, live video, real-time communication and Cloud WAN."""

from nba.scenarios.cdn import (
    CdnInstance,
    CdnSlot,
    cdn_capacity_violations,
    cdn_cost,
    cdn_estimate_upstream,
    cdn_from_json,
    cdn_lower_generic,
    cdn_solve,
    cdn_to_json,
    edge_server_loads,
)
from nba.scenarios.cloudwan import (
    CloudWanInstance,
    CloudWanSlot,
    cloudwan_cost,
    cloudwan_from_json,
    cloudwan_solve,
    cloudwan_to_json,
    flows_feasible,
)
from nba.scenarios.common import ScenarioReport
from nba.scenarios.lvdn import (
    LvdnInstance,
    LvdnSlot,
    Producer,
    RtcnInstance,
    RtcnSlot,
    lvdn_from_json,
    lvdn_lower,
    lvdn_to_json,
    rtcn_expand,
    rtcn_from_json,
    rtcn_to_json,
)
from nba.scenarios.unimodular import (
    SlotMatrix,
    TuResult,
    check_totally_unimodular,
    cloudwan_constraint_matrix,
    integer_determinant,
    is_totally_unimodular,
    slot_lp_relaxation,
)

__all__ = [name for name in dir() if not name.startswith("_")]
