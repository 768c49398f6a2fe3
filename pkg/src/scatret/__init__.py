"""Texture retrieval with scattering-transform Weibull signatures."""
from .config import RunConfig, load_config
from .dwt import dwt2, idwt2
from .filterbank import build_morlet_bank, littlewood_paley
from .imageio import extract_patches, gaussian_blur, load_grayscale, normalize_patch
from .retrieval import FeatureDB, blur_sweep, index_dataset, query, retrieval_rate
from .scattering import nwst, wst
from .signature import Signature, SignatureConfig
from .similarity import ggd_kld_sm, sm_scat, weibull_kernel
from .statmodel import GGDParams, WeibullParams, fit_signature, ggd_fit, weibull_fit

__version__ = "0.1.0"
