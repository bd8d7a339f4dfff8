#include "fedsim/kernels.hpp"

#include <cstdlib>
#include <string>

#include "fedsim/errors.hpp"

namespace fedsim::kernels {

#if defined(FEDSIM_HAVE_AVX2)
const Ops* fedsim_avx2_ops();
#endif
#if defined(FEDSIM_HAVE_NEON)
const Ops* fedsim_neon_ops();
#endif

namespace {

const Ops scalar_table{"scalar",       scalar::dot,      scalar::axpy,
                       scalar::add,    scalar::scale,    scalar::sgd_step,
                       scalar::adam_step, scalar::relu};

#if defined(FEDSIM_HAVE_AVX2)
bool cpu_has_avx2() { return __builtin_cpu_supports("avx2"); }
#endif

Backend detect_backend() {
    const char* env = std::getenv("FEDSIM_KERNELS");
    if (env != nullptr && *env != '\0') {
        const std::string want(env);
        if (want == "scalar") return Backend::scalar;
        if (want == "auto") { /* fall through to detection */
        } else if (want == "avx2" || want == "neon") {
            const Backend b = want == "avx2" ? Backend::avx2 : Backend::neon;
            if (ops_for(b) == nullptr) {
                throw ProtocolError("FEDSIM_KERNELS=" + want +
                                    " requested but that backend is unavailable");
            }
            return b;
        } else {
            throw ProtocolError("FEDSIM_KERNELS must be scalar, avx2, neon or auto (got '" +
                                want + "')");
        }
    }
    if (ops_for(Backend::avx2) != nullptr) return Backend::avx2;
    if (ops_for(Backend::neon) != nullptr) return Backend::neon;
    return Backend::scalar;
}

}  // namespace

const char* backend_name(Backend b) {
    switch (b) {
        case Backend::scalar: return "scalar";
        case Backend::avx2: return "avx2";
        case Backend::neon: return "neon";
    }
    return "?";
}

const Ops* ops_for(Backend b) {
    switch (b) {
        case Backend::scalar:
            return &scalar_table;
        case Backend::avx2:
#if defined(FEDSIM_HAVE_AVX2)
            return cpu_has_avx2() ? fedsim_avx2_ops() : nullptr;
#else
            return nullptr;
#endif
        case Backend::neon:
#if defined(FEDSIM_HAVE_NEON)
            return fedsim_neon_ops();
#else
            return nullptr;
#endif
    }
    return nullptr;
}

std::vector<Backend> available_backends() {
    std::vector<Backend> out;
    for (Backend b : {Backend::scalar, Backend::avx2, Backend::neon}) {
        if (ops_for(b) != nullptr) out.push_back(b);
    }
    return out;
}

Backend active_backend() {
    static const Backend selected = detect_backend();
    return selected;
}

const Ops& ops() { return *ops_for(active_backend()); }

}  // namespace fedsim::kernels
