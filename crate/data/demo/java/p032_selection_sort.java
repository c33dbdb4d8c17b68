import java.util.Scanner;

public class Main {
    public static void main(String[] args) {
        Scanner sc = new Scanner(System.in);
        int n = sc.nextInt();
        int[] a = new int[n];
        for (int i = 0; i < n; i++) {
            a[i] = sc.nextInt();
        }
        int swaps = 0;
        for (int i = 0; i < n; i++) {
            int minj = i;
            for (int j = i; j < n; j++) {
                if (a[j] < a[minj]) {
                    minj = j;
                }
            }
            if (minj != i) {
                int t = a[i];
                a[i] = a[minj];
                a[minj] = t;
                swaps++;
            }
        }
        StringBuilder sb = new StringBuilder();
        for (int v : a) {
            sb.append(v).append(' ');
        }
        System.out.println(sb.toString().trim());
        System.out.println(swaps);
    }
}
