#include "difd/kernels.hpp"

#include "difd/error.hpp"

#include <cstdlib>

namespace difd::kernels {

#ifdef DIFD_HAVE_AVX2
const Ops& avx2_ops(); // kernels_avx2.cpp
#endif

bool avx2_available() {
#ifdef DIFD_HAVE_AVX2
    return __builtin_cpu_supports("avx2") != 0;
#else
    return false;
#endif
}

namespace {

const Ops* resolve(Backend b) {
    switch (b) {
    case Backend::scalar:
        return &scalar_ops();
    case Backend::avx2:
#ifdef DIFD_HAVE_AVX2
        if (avx2_available())
            return &avx2_ops();
#endif
        throw ParamError("avx2 kernels not available on this build/CPU");
    }
    throw ParamError("unknown kernel backend");
}

const Ops* initial_table() {
    if (const char* env = std::getenv("DIFD_KERNELS")) {
        std::string name(env);
        if (name == "scalar")
            return &scalar_ops();
        if (name == "avx2")
            return resolve(Backend::avx2);
        // anything else, including "auto", falls through to detection
    }
    return avx2_available() ? resolve(Backend::avx2) : &scalar_ops();
}

const Ops*& active_table() {
    static const Ops* table = initial_table();
    return table;
}

} // namespace

const Ops& ops() {
    return *active_table();
}

Backend active_backend() {
    return active_table() == &scalar_ops() ? Backend::scalar : Backend::avx2;
}

void select_backend(Backend b) {
    active_table() = resolve(b);
}

void select_backend_by_name(const std::string& name) {
    if (name == "auto") {
        active_table() = avx2_available() ? resolve(Backend::avx2) : &scalar_ops();
    } else if (name == "scalar") {
        select_backend(Backend::scalar);
    } else if (name == "avx2") {
        select_backend(Backend::avx2);
    } else {
        throw ParamError("unknown kernel backend '" + name + "'");
    }
}

} // namespace difd::kernels
