#include <stdio.h>

int main(void) {
    int n;
    scanf("%d", &n);
    long total = 0;
    for (int i = 0; i < n; i++) {
        int v;
        scanf("%d", &v);
        total += v;
    }
    printf("%ld\n", total);
    return 0;
}
