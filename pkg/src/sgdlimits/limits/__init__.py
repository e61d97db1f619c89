from .gmm import (BGMM_DIFFUSIVE_SCHEMA, BGMM_SCHEMA, XOR_DIFFUSIVE_SCHEMA, GaussianFunctionals,
                  bgmm_ballistic_rhs, bgmm_ballistic_rhs_noiseless, bgmm_diffusive,
                  bgmm_gaussian_expectations, bgmm_noiseless_system, bgmm_system, c_alpha_bgmm,
                  c_alpha_xor, xor_ballistic_rhs, xor_ballistic_rhs_noiseless, xor_diffusive,
                  xor_gaussian_expectations, xor_noiseless_system, xor_system)
from .integrators import (McConfig, OdeSystem, SdeSystem, euler_maruyama, euler_maruyama_paths,
                          psd_sqrt, rk4_integrate)
from .tensor import (ballistic_system, loss_system, tensor_pca_ballistic_rhs,
                     tensor_pca_diffusive, tensor_pca_double_diffusive, tensor_pca_loss_rhs)
from .systems import SYSTEM_NAMES, build_system
