#include <stdio.h>
#include <string.h>

int main(void) {
    char buf[128];
    scanf("%127s", buf);
    int len = strlen(buf);
    int lo = 0;
    int hi = len - 1;
    while (lo < hi) {
        char c = buf[lo];
        buf[lo] = buf[hi];
        buf[hi] = c;
        lo++;
        hi--;
    }
    printf("%s\n", buf);
    return 0;
}
