/* cc -Iinclude examples/smoke.c ../../target/release/libldchain_ffi.a -lpthread -ldl -lm -o smoke */
#include <stdio.h>
#include "ldchain.h"

int main(void) {
    LdChain *chain = NULL;
    if (ld_chain_new_harmonic(3, 1, 1.0, 1.0, 1.0, 1.0, 0.0, &chain) != LD_STATUS_OK) {
        fprintf(stderr, "%s\n", ld_last_error_message());
        return 1;
    }
    double f = 0.0, kappa = 0.0;
    ld_scgf_riccati(chain, 1e-3, &f);
    ld_kappa(1.0, 1.0, 1.0, LD_KAPPA_METHOD_CLOSED_FORM, 0, &kappa);
    printf("ldchain %s: F/lambda^2 = %.9f, kappa = %.9f\n", ld_version(), f / 1e-6, kappa);
    if (ld_scgf_riccati(chain, 5.0, &f) != LD_STATUS_NUMERICAL) {
        return 1;
    }
    printf("expected failure: %s\n", ld_last_error_message());
    ld_chain_free(chain);
    return 0;
}
