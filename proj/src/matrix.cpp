#include "mflab/matrix.hpp"

namespace mflab {

Matrix identity(index_t n) {
    Matrix m(n, n, true);
    for (index_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

bool strictly_lower(const Matrix& m) {
    for (index_t i = 0; i < m.rows; ++i)
        for (index_t j = i + 1; j < m.cols; ++j)
            if (m(i, j) != 0.0) return false;
    return true;
}

}  // namespace mflab
