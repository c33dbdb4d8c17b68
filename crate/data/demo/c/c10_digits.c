#include <stdio.h>

int main(void) {
    long n;
    scanf("%ld", &n);
    int digits = 0;
    int total = 0;
    if (n == 0) {
        digits = 1;
    }
    while (n > 0) {
        total += n % 10;
        n /= 10;
        digits++;
    }
    printf("%d %d\n", digits, total);
    return 0;
}
