import java.util.Arrays;
import java.util.Scanner;

public class Main {
    static boolean contains(int[] sorted, int key) {
        int left = 0;
        int right = sorted.length;
        while (left < right) {
            int mid = (left + right) / 2;
            if (sorted[mid] == key) {
                return true;
            } else if (sorted[mid] < key) {
                left = mid + 1;
            } else {
                right = mid;
            }
        }
        return false;
    }

    public static void main(String[] args) {
        Scanner sc = new Scanner(System.in);
        int n = sc.nextInt();
        int[] s = new int[n];
        for (int i = 0; i < n; i++) {
            s[i] = sc.nextInt();
        }
        Arrays.sort(s);
        int q = sc.nextInt();
        int hits = 0;
        for (int i = 0; i < q; i++) {
            if (contains(s, sc.nextInt())) {
                hits++;
            }
        }
        System.out.println(hits);
    }
}
