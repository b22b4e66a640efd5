"""Signature-kernel verification of spatio-temporal ensemble forecasts.

Core pieces: path containers and augmentations (paths), truncated
signatures (signature), the Goursat solver for signature kernels (kernel),
proper kernel scores and prequential generator fitting (scoring), classical
grid metrics (metrics), region scorecards (scorecard), and binary grid
bundles plus the command line (bundle, cli).
"""

from .errors import (ConfigError, IngestionError, NumericalInstabilityError,
                     SigscoreError)
from .paths import (DataStream, GridField, PathAugmenter, augment,
                    extract_patches, interpolate_linear,
                    latitude_slice_streams, normalize_for_kernel)
from .signature import (MAX_LEVEL_ENTRIES, SignatureFeatures,
                        TruncatedSignature, chen_concat,
                        levy_area, segment_signature, shuffle_words,
                        stream_signature, truncated_inner_product,
                        word_coefficient)
from .kernel import (GramMatrix, SignatureKernel, StaticKernel,
                     goursat_kernel, gram, signature_kernel_pairs,
                     static_kernel_eval)
from .scoring import (Ar1Generator, EnsemblePaths, GeneratorContract,
                      GeneratorFit, LatentPlan, PatchSpec,
                      PersistenceGenerator, ToyGeneratorSearch,
                      fit_toy_generator, generate_sliding, kernel_distance,
                      kernel_score, lat_weighted_sig_score,
                      prequential_objective)
from .metrics import (LatWeights, MetricReport, calibration_error,
                      crps_empirical, lat_weights, ncrps_field, nrmse,
                      r2_field, rmse_lat, rqe, tail_percentiles)
from .scorecard import (CLASSICAL_METRICS, Region, Scorecard, ScorecardCell,
                        build_scorecard, classical_by_lead,
                        normalized_difference, region_indices,
                        scorecard_to_csv,
                        scorecard_to_json, scorecard_to_svg,
                        sigk_by_pathlength, standard_regions, subsample_inits)
from .bundle import (SCHEMA_VERSION, EnsembleForecastGrid, GridBundleManifest,
                     ObservationGrid, align_observations, load_bundle,
                     write_bundle)

__version__ = "0.1.0"

__all__ = [
    "Ar1Generator", "CLASSICAL_METRICS", "ConfigError", "DataStream",
    "EnsembleForecastGrid",
    "EnsemblePaths", "GeneratorContract", "GeneratorFit", "GramMatrix",
    "GridBundleManifest", "GridField", "IngestionError", "LatWeights",
    "LatentPlan", "MAX_LEVEL_ENTRIES", "MetricReport", "NumericalInstabilityError", "PatchSpec",
    "PathAugmenter", "PersistenceGenerator", "Region", "SCHEMA_VERSION",
    "Scorecard",
    "ScorecardCell", "SignatureFeatures", "SignatureKernel", "SigscoreError",
    "StaticKernel", "ToyGeneratorSearch", "TruncatedSignature",
    "align_observations", "augment", "build_scorecard", "calibration_error",
    "chen_concat", "classical_by_lead", "crps_empirical", "extract_patches",
    "fit_toy_generator", "generate_sliding", "goursat_kernel", "gram",
    "interpolate_linear", "kernel_distance", "kernel_score",
    "lat_weighted_sig_score", "lat_weights", "latitude_slice_streams",
    "levy_area", "load_bundle", "ncrps_field", "normalize_for_kernel",
    "normalized_difference", "nrmse", "prequential_objective", "r2_field",
    "region_indices", "rmse_lat", "rqe", "scorecard_to_csv", "scorecard_to_json",
    "scorecard_to_svg", "segment_signature", "shuffle_words",
    "sigk_by_pathlength", "signature_kernel_pairs", "standard_regions",
    "static_kernel_eval", "stream_signature", "subsample_inits",
    "tail_percentiles", "truncated_inner_product", "word_coefficient",
    "write_bundle",
]
