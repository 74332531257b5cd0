#include <math.h>
#include <stdio.h>
#include "nkpc.h"

int main(void) {
    NkpcDataset *ds = NULL;
    if (nkpc_dataset_synth(3, 70, &ds) != NKPC_STATUS_OK) {
        fprintf(stderr, "synth: %s\n", nkpc_last_error());
        return 1;
    }
    NkpcLedger *ledger = NULL;
    const char *cfg = "[backtest]\ntest_quarters = 8\nhorizons = [1]\nmodels = [\"ols\", \"ar\"]\ntuning = \"off\"\n";
    if (nkpc_backtest(ds, cfg, &ledger) != NKPC_STATUS_OK) {
        fprintf(stderr, "backtest: %s\n", nkpc_last_error());
        return 1;
    }
    size_t n = nkpc_ledger_len(ledger);
    double sse = 0.0;
    for (size_t i = 0; i < n; i++) {
        NkpcRecord r;
        if (nkpc_ledger_record(ledger, i, &r, NULL, NULL) != NKPC_STATUS_OK) {
            return 1;
        }
        sse += (r.actual - r.prediction) * (r.actual - r.prediction);
    }
    if (nkpc_dataset_synth(3, 5, &ds) != NKPC_STATUS_COMPUTATION || nkpc_last_error() == NULL) {
        return 1;
    }
    printf("%zu %.6f\n", n, sqrt(sse / (double)n));
    nkpc_ledger_free(ledger);
    nkpc_dataset_free(ds);
    return 0;
}
