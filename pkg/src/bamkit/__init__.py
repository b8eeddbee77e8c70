"""Certified best approximation mappings and circumcenter methods."""

from .bam import (BAMViolation, BamCertificate, CompositionConstants, IterationTrace,
                  PointDiagnostics, Provenance, averaged_projector_certificate,
                  certify_empirical, combine2, combine2_constant, combineN_product,
                  compose2, compose2_constant, compose_chain, from_averaged_linear,
                  from_contraction, iterate, normal_matrix_bam, point_diagnostics,
                  projector_certificate)
from .circumcenter import (CCResult, CircumcenterOf, CircumcenterUndefined, OperatorSet,
                           SuiteKind, build_reflection_suite, cc_compose_combine,
                           cc_map_eval, circumcenter, crm_certificate, map_rate)
from .operators import (Averaged, Compose, ConvexCombo, Identity, LinearMap, Projector,
                        Property, PropertyReport, Reflector, SampleSpec, ShiftConjugate,
                        check_property, conjugate_shift, evaluate)
from .sets import (AffineSubspace, Ball, FriedrichsResult, LinearSubspace, Orthant,
                   OrthantBall, Segment, Singleton, TwoBallIntersection,
                   friedrichs_cosine, intersect_affine)

__version__ = "0.1.0"
