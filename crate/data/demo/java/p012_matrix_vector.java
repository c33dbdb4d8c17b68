import java.util.Scanner;

public class Main {
    public static void main(String[] args) {
        Scanner sc = new Scanner(System.in);
        int n = sc.nextInt();
        int m = sc.nextInt();
        int[][] mat = new int[n][m];
        int[] vec = new int[m];
        for (int i = 0; i < n; i++) {
            for (int j = 0; j < m; j++) {
                mat[i][j] = sc.nextInt();
            }
        }
        for (int j = 0; j < m; j++) {
            vec[j] = sc.nextInt();
        }
        for (int i = 0; i < n; i++) {
            long acc = 0;
            for (int j = 0; j < m; j++) {
                acc += (long) mat[i][j] * vec[j];
            }
            System.out.println(acc);
        }
    }
}
