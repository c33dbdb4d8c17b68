#include <stdio.h>

int main(void) {
    int n;
    scanf("%d", &n);
    int best = -1000000;
    int idx = 0;
    for (int i = 0; i < n; i++) {
        int x;
        scanf("%d", &x);
        if (x > best) {
            best = x;
            idx = i;
        }
    }
    printf("%d %d\n", best, idx);
    return 0;
}
