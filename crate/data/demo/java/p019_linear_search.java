import java.util.Scanner;

public class Main {
    public static void main(String[] args) {
        Scanner sc = new Scanner(System.in);
        int n = sc.nextInt();
        int[] tab1 = new int[n];
        for (int i = 0; i < n; i++) {
            tab1[i] = sc.nextInt();
        }
        int q = sc.nextInt();
        int ans1 = 0;
        for (int i = 0; i < q; i++) {
            int key = sc.nextInt();
            for (int j = 0; j < n; j++) {
                if (tab1[j] == key) {
                    ans1++;
                    break;
                }
            }
        }
        System.out.println(ans1);
    }
}
