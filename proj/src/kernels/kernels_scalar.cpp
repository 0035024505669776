#include "lgan/kernels/kernels.hpp"
#include "lgan/kernels/kernels_ref.hpp"

namespace lgan::kern {

const KernelTable& scalar_table() {
  static const KernelTable t = {
      &ref::gemm_nn<float>, &ref::gemm_nt<float>,  &ref::add<float>,
      &ref::sub<float>,     &ref::mul<float>,      &ref::axpy<float>,
      &ref::scale<float>,   &ref::relu_fwd<float>, &ref::relu_bwd<float>,
      &ref::lrelu_fwd<float>, &ref::lrelu_bwd<float>, &ref::reduce_sum<float>,
      &ref::reduce_sumsq<float>, &ref::reduce_abssum<float>,
  };
  return t;
}

}  // namespace lgan::kern
