#include "vse/parallel.hpp"

#include <omp.h>

namespace vse {

namespace {
int default_threads = omp_get_max_threads();
}

void set_num_threads(int n) {
    omp_set_num_threads(n < 1 ? default_threads : n);
}

int num_threads() {
    return omp_get_max_threads();
}

} // namespace vse
