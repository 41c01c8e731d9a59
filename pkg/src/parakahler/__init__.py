"""Para-Kaehler immersions into para-Kaehler space forms.

Split-complex arithmetic, a potential DSL with Taylor-jet differentiation,
diastasis functions, separable-rank probes, two factorisation routes and the
space-form classification.
"""
from .builder import (Alignment, Immersion, ImmersionReport, NotFiniteRank, OutsideRegularSet,
                      SeparableDecomposition, align, assemble_immersion, cross_decompose,
                      pde_decompose, verify_immersion)
from .classification import (ClassificationVerdict, classify, closed_form_dk,
                             counterexample_potential, counterexample_ranks, space_form_h,
                             source_field, veronese)
from .diastasis import (DiastasisField, HereditaryReport, d0, diastasis, h_expression,
                        h_function, hereditary_check)
from .dsl import DSLError, DSLSyntaxError, DomainError, PotentialExpr, evaluate, parse
from .jets import JetBatch, MultiJet, jet_derivative, jet_lift, jet_lift_many
from .paracomplex import SplitComplex, d_inner, d_norm_sq, is_d_unitary, pc_mul
from .pfaffian import CompatibilityError, MatrixField, compatibility_residual, pfaffian_solve
from .separability import (DependencyReport, IndexSet, SampleMatrix, build_index_set,
                           dependency_check, sample_rank, wronskian_order)
from .spaceforms import (AmbientPoint, SpaceFormModel, ambient_diastasis, chart_diastasis,
                         model_potential)

__version__ = "0.1.0"
