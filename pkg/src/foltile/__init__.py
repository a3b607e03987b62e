"""foltile: exact tilings of finitely generated amenable groups and of
finite windows of their translation actions, by approximately invariant
(Folner) shapes, with every quantitative claim re-verified exactly."""

from .errors import (FoltileError, InfeasibleParameters, InvalidInput,
                     VerificationFailure)
from .groups import (GroupModel, Heisenberg, Lamplighter, Shape, Zd, boundary,
                     get_model, invariance_defect, is_invariant, multiply_set,
                     propagate_invariance)
from .windows import (ActionWindow, DensityReport, PointSet,
                      check_epsilon_disjoint, is_star_invariant,
                      lower_banach_density, make_window, upper_banach_density)
from .coloring import (Coloring, LocalGraph, greedy_coloring,
                       translate_overlap_partition, verify_proper)
from .matching import (AugmentingPath, BipartiteRelation,
                       ExpansivityCertificate, MatchingState,
                       certify_expansivity, eliminate_short_augmenting, flip,
                       match_saturating, oracle_max_matching)
from .quasitiling import (GroupQuasitiling, PackBoundResult, QuasitileParams,
                          TileAtlas, greedy_pack, group_quasitile,
                          group_quasitile_ladder, ladder_length,
                          pack_bound_check, pack_slack_delta,
                          quasitile_window, star_invariance_check)
from .tiling import (Tiling, assemble_shapes, build_slot_relation,
                     carve_slots, choose_epsilon, choose_exchange_window,
                     tile_exactly, verify_tiling)
from .config import RunConfig, parse_k

__version__ = "0.1.0"
