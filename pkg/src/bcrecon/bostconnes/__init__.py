"""Number-field layer: towers, boundary maps, invariant families, conjugacy."""
from .boundary import (BoundaryError, PrimeInF, beta_set, boundary, boundary_table, compose_D,
                       level_basis, psi_tilde, trace_tau)
from .conjugacy import (EquivarianceCertificate, EquivarianceFailure, TruncatedAction,
                        build_truncated_conjugacy, truncated_action)
from .family import (ConjugacyData, FamilyError, InconsistentFamily, InvariantFamily, Mismatch,
                     Recovery, build_family, dumps_family, load_family, match_families,
                     recover_P1_and_h, tau_normalization)
from .fields import (DepthUnavailable, FieldDataError, InconsistentTower, NumberFieldData,
                     PrimeLabel, PrimeOverlap, SchemaError, TowerEntry, builtin_rationals,
                     dumps_field, galois_chain, load_field_data, relation_lattice, save_field_data,
                     tower_from_kernels, validate_field)

__all__ = [name for name in dir() if not name.startswith("_")]
